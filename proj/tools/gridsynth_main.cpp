#include "gridsynth/cli.hpp"

int main(int argc, char** argv) { return gridsynth::cli::run(argc, argv); }
