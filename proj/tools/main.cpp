#include "varsplit/cli.hpp"

int main(int argc, char** argv) { return varsplit::run_cli(argc, argv); }
