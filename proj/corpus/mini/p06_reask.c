int main() {
    int x = 10;
    while (x > 0) {
        x = x - 1;
    }
    assert(x == 0);
    return 0;
}
