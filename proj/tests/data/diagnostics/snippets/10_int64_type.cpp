__int64 __fastcall sum(_DWORD *a1, int a2)
{
  __int64 result = 0;
  for (int i = 0; i < a2; ++i) result += a1[i];
  return result;
}
int main() { return 0; }
