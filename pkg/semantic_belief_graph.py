##################################################################################################
#                                     SEMANTIC BELIEF GRAPH                                      #
#                                                                                                #
# Entry point of the command-line tool.                                                          #
# Plans, simulates and compares terrain-aware policies over Semantic Belief Graphs.              #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

import sys

from cli.main import main

##################################################################################################
#                                      APPLICATION LAUNCHER                                      #
##################################################################################################

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
