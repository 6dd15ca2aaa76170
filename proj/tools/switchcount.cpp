#include "switchcount/cli.hpp"

int main(int argc, char** argv) { return switchcount::run_cli(argc, argv); }
