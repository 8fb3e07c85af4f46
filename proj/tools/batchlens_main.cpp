#include "batchlens/cli.hpp"

int main(int argc, char** argv) { return batchlens::cli::dispatch(argc, argv); }
