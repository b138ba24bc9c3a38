#include "scopf/cli.hpp"

int main(int argc, char** argv) { return scopf::cli::run(argc, argv); }
