public String greet(String name) {
    /* build the greeting */
    String s = "Hi \"x\"" + name + 4.2e-1;
    return s.trim() + '!' ; // done
}
