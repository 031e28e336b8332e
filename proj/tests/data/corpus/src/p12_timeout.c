int __cdecl main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+0h] [rbp-10h] BYREF
  __int64 v5; // [rsp+8h] [rbp-8h]

  scanf("%d", &v4);
  v5 = 0;
  while ( v4 > 1 )
  {
    if ( (v4 & 1) != 0 )
      v4 = 3 * v4 + 1;
    else
      v4 /= 2;
    ++v5;
  }
  printf("%d\n", (unsigned int)v5);
  return 0;
}
