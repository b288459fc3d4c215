int main() {
    int j, k, flag;
    j = 2;
    k = 0;

    while(unknown()) {
        if(flag) 
            j = j + 4;
        else {
            j = j + 2;
            k = k + 1;
        }
    }

    assert((k == 0) || j == 2 * k + 2);
}
