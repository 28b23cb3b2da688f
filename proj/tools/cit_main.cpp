#include <cit/service.hpp>

int main(int argc, char** argv) {
    return cit::run_command(argc, argv);
}
