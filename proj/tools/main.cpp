#include "delaydense/cli.hpp"

int main(int argc, char** argv) { return delaydense::cli::run(argc, argv); }
