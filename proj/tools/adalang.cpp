#include "adalang/cli.hpp"

int main(int argc, char** argv) { return adalang::cli::main_entry(argc, argv); }
