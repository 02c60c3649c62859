// placeholder so the target builds while modules are under construction
int main() { return 0; }
