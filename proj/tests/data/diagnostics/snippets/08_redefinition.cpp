int solve(int a) { return a; }
int solve(int a) { return a + 1; }
int main() { return solve(1); }
