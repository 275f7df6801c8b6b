#include "luna/cli.hpp"

int main(int argc, char** argv) { return luna::run_cli(argc, argv); }
