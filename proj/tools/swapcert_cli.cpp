// Command-line front end; subcommands land here as the library fills out.
#include <cstdio>

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::puts("swapcert: no subcommands wired up yet");
    return 2;
}
