#include "cgem/cli.hpp"

int main(int argc, char** argv) { return cgem::cli::run(argc, argv); }
