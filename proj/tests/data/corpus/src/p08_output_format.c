int __cdecl main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+8h] [rbp-18h] BYREF
  int v5; // [rsp+Ch] [rbp-14h] BYREF
  __int64 v6; // [rsp+10h] [rbp-10h]

  scanf("%d %d", &v4, &v5);
  v6 = (unsigned int)(v4 / v5);
  printf("%d %d\n", (unsigned int)v6, (unsigned int)(v4 % v5));
  return 0;
}
