int __cdecl main(int argc, const char **argv, const char **envp)
{
  __int128 v4; // [rsp+0h] [rbp-20h] BYREF
  _QWORD *v5; // [rsp+10h] [rbp-10h]

  v5 = sub_1189(&unk_2004, &v4);
  sub_11C0(v5, qword_4020);
  return 0;
}
