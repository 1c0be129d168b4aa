#include "mrccc/cli.hpp"

int main(int argc, char** argv) { return mrccc::cli_dispatch(argc, argv); }
