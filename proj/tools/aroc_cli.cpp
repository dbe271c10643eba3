#include "cli.hpp"

int main(int argc, char** argv) { return aroc::cli::run(argc, argv); }
