__int64 __fastcall diff(int a1, int a2)
{
  return (unsigned int)(a1 - a2);
}

int __cdecl main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+0h] [rbp-10h] BYREF
  int v5; // [rsp+4h] [rbp-Ch] BYREF

  scanf("%d %d", &v4, &v5);
  printf("%d\n", (unsigned int)diff(v4, v5));
  return 0;
}
