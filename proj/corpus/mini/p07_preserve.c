int main() {
    int i = 0;
    int j = 0;
    int n;
    if (n < 0) return 0;
    while (i < n) {
        i = i + 1;
        j = j + 1;
    }
    assert(j == n);
    return 0;
}
