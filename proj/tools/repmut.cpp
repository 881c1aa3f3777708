#include "repmut/cli.hpp"

int main(int argc, char** argv) { return repmut::cli_main(argc, argv); }
