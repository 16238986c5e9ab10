#include "cli.hpp"

int main(int argc, char** argv) { return shearstab::cli::main_entry(argc, argv); }
