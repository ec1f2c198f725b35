fn main() {
    satlens::cli_main();
}
