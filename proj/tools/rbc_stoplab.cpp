#include "rbc/cli.hpp"

int main(int argc, char** argv) { return rbc::run_command(argc, argv); }
