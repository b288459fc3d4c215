extern int unknown();

int main() {
    int i = 0;
    int s = 0;
    int n;
    if (n < 0) return 0;
    while (i < n) {
        if (unknown()) s = s + 1;
        i = i + 1;
    }
    assert(s <= n);
    return 0;
}
