#include "autoformal/cli.hpp"

int main(int argc, char** argv) { return autoformal::cli::run_main(argc, argv); }
