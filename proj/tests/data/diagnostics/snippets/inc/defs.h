typedef unsigned int _DWORD;
inline _DWORD bad() { return undefined_symbol; }
