#include "socnav/cli.hpp"

int main(int argc, char** argv) { return socnav::run_cli(argc, argv); }
