#include "plmi/cli.hpp"

int main(int argc, char** argv) { return plmi::run_cli(argc, argv); }
