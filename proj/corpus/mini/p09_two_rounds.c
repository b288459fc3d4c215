int main() {
    int x = 0;
    int y = 0;
    int n;
    if (n < 0) return 0;
    while (x < n) {
        x = x + 1;
        y = y + 3;
    }
    assert(y == 3 * n);
    return 0;
}
