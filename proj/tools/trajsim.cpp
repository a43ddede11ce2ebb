#include "trajsim/commands.hpp"

int main(int argc, char** argv) { return trajsim::run_cli(argc, argv); }
