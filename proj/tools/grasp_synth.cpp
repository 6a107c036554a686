#include "graspsynth/cli.hpp"

int main(int argc, char** argv) { return graspsynth::run_cli(argc, argv); }
