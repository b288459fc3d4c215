int main() {
    int x = 1;
    int y = 0;
    int n;
    if (n < 1) return 0;
    while (y < n) {
        x = x + 2;
        y = y + 1;
    }
    assert(x == 2 * n + 1);
    return 0;
}
