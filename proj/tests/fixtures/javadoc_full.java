/**
 * Reads a line of input and stores it in a fixed-size buffer.
 *
 * @param request the incoming request wrapper
 * @throws Throwable if the underlying stream fails
 */
public void processLine(HttpServletRequest request) throws Throwable {
    String data; /* the raw line */
    data = request.getParameter("name"); // may be null
    if (data == null) {
        data = ""; // normalize missing input
    }
    /* copy into the fixed buffer
       one character at a time */
    char[] buffer = new char[16];
    for (int i = 0; i <= data.length(); i++) {
        buffer[i] = data.charAt(i); // off by one on the last round
    }
    IO.writeLine(String.valueOf(buffer));
    // done
}
