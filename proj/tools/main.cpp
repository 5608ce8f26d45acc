#include "recsearch/cli.hpp"

int main(int argc, char** argv) { return recsearch::run_cli(argc, argv); }
