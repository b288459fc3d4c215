extern int unknown();

int main() {
    int x = 0;
    int y = 0;
    while (unknown()) {
        if (unknown()) {
            x = x + 1;
            y = y + 1;
        } else {
            x = x + 2;
            y = y + 2;
        }
    }
    assert(x == y);
    return 0;
}
