int main() {
    int k = 0;
    int t = 0;
    int n;
    if (n < 0) return 0;
    while (k < n) {
        k = k + 1;
        t = t + k;
    }
    assert(t >= k);
    return 0;
}
