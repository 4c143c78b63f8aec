#include "meder/cli.hpp"

int main(int argc, char** argv) { return meder::cli::run(argc, argv); }
