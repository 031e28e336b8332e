void f(int, int);
int main()
{
  f("x");
  return 0;
}
