// Placeholder while the library is scaffolded; replaced by the real CLI.
int main() { return 0; }
