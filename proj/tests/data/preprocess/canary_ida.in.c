unsigned __int64 __fastcall print_row(int a1)
{
  int i; // [rsp+14h] [rbp-1Ch]
  char s[8]; // [rsp+18h] [rbp-18h] BYREF
  unsigned __int64 v4; // [rsp+28h] [rbp-8h]

  v4 = __readfsqword(0x28u);
  for ( i = 0; i < a1; ++i )
    s[i] = 42;
  s[a1] = 0;
  puts(s);
  return __readfsqword(0x28u) ^ v4;
}

unsigned long check_tail(const char *a1)
{
  unsigned long v2; // [rsp+18h] [rbp-8h]

  v2 = __readfsqword(0x28u);
  printf("%s\n", a1);
  return v2 - __readfsqword(0x28u);
}

int __cdecl main(int argc, const char **argv, const char **envp)
{
  unsigned __int64 v5; // [rsp+8h] [rbp-8h]

  v5 = __readfsqword(0x28u);
  print_row(3);
  puts("v5 = __readfsqword(0x28u);");
  if ( __readfsqword(0x28u) != v5 )
    __stack_chk_fail();
  return 0;
}
