#include "cli.hpp"

int main(int argc, char** argv) { return afmlens::cli::run(argc, argv); }
