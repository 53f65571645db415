#include "cli.hpp"

int main(int argc, char** argv)
{
    return bdiff::cli::dispatch(argc, argv);
}
