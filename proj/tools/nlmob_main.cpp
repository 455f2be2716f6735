#include "nlmob/cli.hpp"

int main(int argc, char** argv) { return nlmob::run_subcommand(argc, argv); }
