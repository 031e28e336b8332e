int __cdecl main(int v3, char **v4, char **v5)
{
  int i; // [rsp+1Ch] [rbp-4h]

  for ( i = 0; i < v3; ++i )
    puts(v4[i]);
  return 0;
}
