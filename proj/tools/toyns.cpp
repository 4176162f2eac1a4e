#include "toyns/cli.hpp"

int main(int argc, char** argv) { return toyns::cli::run_command(argc, argv); }
