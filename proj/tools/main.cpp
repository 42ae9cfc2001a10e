#include "wq/cli.hpp"

int main(int argc, char** argv) { return wq::cli::run(argc, argv); }
