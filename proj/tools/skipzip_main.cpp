#include "skipzip/cli.hpp"

int main(int argc, char** argv) { return skipzip::cli::run(argc, argv); }
