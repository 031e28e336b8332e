void *_init_proc()
{
  void *result; // rax

  result = &_gmon_start__;
  if ( &_gmon_start__ )
    return (void *)_gmon_start__();
  return result;
}

void _do_global_dtors_aux()
{
  if ( !completed_0 )
  {
    if ( &__cxa_finalize )
      _cxa_finalize(_dso_handle);
    deregister_tm_clones();
    completed_0 = 1;
  }
}

void *register_hooks()
{
  if ( _ITM_registerTMCloneTable )
    return (void *)_ITM_registerTMCloneTable(&completed_0, 8LL);
  else
    return 0LL;
}

int __cdecl main(int argc, const char **argv, const char **envp)
{
  // __gmon_start__ is referenced by crt1
  puts("__cxa_finalize");
  return 0;
}
