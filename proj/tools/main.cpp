#include "ldi/cli.hpp"

int main(int argc, char** argv) {
    return ldi::run_cli({argv + 1, argv + argc});
}
