#include <cstdio>

int main() {
    std::puts("todaspec CLI placeholder");
    return 0;
}
