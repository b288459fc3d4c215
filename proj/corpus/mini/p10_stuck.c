int main() {
    int s = 0;
    int i = 0;
    int n;
    if (n < 0) return 0;
    while (i < n) {
        i = i + 1;
        s = s + 2;
    }
    assert(s >= i);
    return 0;
}
