#include "cli.hpp"

int main(int argc, char** argv) { return edrep::cli::run(argc, argv); }
