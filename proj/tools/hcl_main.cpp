#include "hcl/hcl.hpp"

#include <cstdio>

int main() {
    std::puts("hcl cli placeholder");
    return 0;
}
