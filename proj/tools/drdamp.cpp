#include "drdamp/cli.hpp"

int main(int argc, char** argv) { return drdamp::cli::run(argc, argv); }
