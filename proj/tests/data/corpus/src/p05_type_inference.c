__int64 __fastcall sum_array(_DWORD *a1, int a2)
{
  __int64 result; // rax
  unsigned int i; // [rsp+14h] [rbp-4h]

  result = 0LL;
  for ( i = 0; (int)i < a2; ++i )
    result += (int)a1[i];
  return result;
}

int __cdecl main(int argc, const char **argv, const char **envp)
{
  int n; // [rsp+4h] [rbp-1ACh] BYREF
  int i; // [rsp+8h] [rbp-1A8h]
  _DWORD v6[100]; // [rsp+10h] [rbp-1A0h] BYREF

  scanf("%d", &n);
  for ( i = 0; i < n; ++i )
    scanf("%d", &v6[i]);
  printf("%lld\n", sum_array(v6, n));
  return 0;
}
