#include "cli.hpp"

int main(int argc, char** argv) { return frontier_dyn::cli::run(argc, argv); }
