#include "critiq/cli.hpp"

int main(int argc, char** argv) { return critiq::cli::run_main(argc, argv); }
