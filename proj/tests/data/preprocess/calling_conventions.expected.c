__int64 sub_1189(int a1, int a2)
{
  return (unsigned int)(a2 + a1);
}

int sub_11B0(int a1, char *a2)
{
  return a2[a1];
}

void __noreturn fail(const char *a1)
{
  puts(a1);
  exit(1);
}

int main(int argc, char **argv, char **envp)
{
  if ( argc > 1 )
    puts(argv[1]);
  if ( *envp )
    puts(*envp);
  return sub_1189(argc, 2);
}
