void *_init_proc()
{
  void *result; // rax

  return result;
}

void _do_global_dtors_aux()
{
  if ( !completed_0 )
  {
    deregister_tm_clones();
    completed_0 = 1;
  }
}

void *register_hooks()
{
    return 0LL;
}

int main(int argc, char **argv)
{
  // __gmon_start__ is referenced by crt1
  puts("__cxa_finalize");
  return 0;
}
