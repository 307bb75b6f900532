#include "wadapt/cli.hpp"

int main(int argc, char** argv) { return wadapt::run_cli(argc, argv); }
